// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/checkpoint.hpp"

#include "json_io.hpp"

namespace pitlab {

namespace fs = std::filesystem;
using detail::ojson;

namespace {

template <Real T>
constexpr const char* precision_name() {
  return std::same_as<T, float> ? "f32" : "f64";
}

}  // namespace

bool is_checkpoint(const fs::path& dir) {
  return fs::is_regular_file(dir / "manifest.json") && fs::is_regular_file(dir / "params.bin");
}

template <Real T>
void save_checkpoint(const fs::path& dir, const Model<T>& model, const Vocab& vocab,
                     const OptimState<T>* optim, std::uint64_t step,
                     const std::map<std::string, std::string>& meta) {
  fs::create_directories(dir);
  std::vector<NamedTensor<T>> tensors;
  for (const auto& p : model.parameters()) tensors.push_back({p.name, p.value});
  write_tensors(dir / "params.bin", tensors);
  vocab.save(dir / "vocab.json");
  if (optim != nullptr) {
    std::vector<NamedTensor<T>> moments;
    const auto& params = model.parameters();
    for (std::size_t i = 0; i < optim->m.size(); ++i) {
      moments.push_back({"m/" + params[i].name, optim->m[i]});
      moments.push_back({"v/" + params[i].name, optim->v[i]});
    }
    write_tensors(dir / "optim.bin", moments);
  } else if (fs::exists(dir / "optim.bin")) {
    fs::remove(dir / "optim.bin");
  }
  ojson j;
  j["format"] = "pitlab-checkpoint";
  j["version"] = 1;
  j["precision"] = precision_name<T>();
  j["config"] = detail::to_json(model.config());
  j["vocab_hash"] = vocab.hash();
  j["step"] = step;
  if (optim != nullptr) j["optim_step"] = optim->step;
  j["meta"] = ojson::object();
  for (const auto& [k, v] : meta) j["meta"][k] = v;
  detail::write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::map<std::string, std::string> read_checkpoint_meta(const fs::path& dir) {
  const ojson j = detail::read_json_file(dir / "manifest.json");
  std::map<std::string, std::string> meta;
  if (auto it = j.find("meta"); it != j.end() && it->is_object())
    for (const auto& [k, v] : it->items())
      if (v.is_string()) meta[k] = v.get<std::string>();
  return meta;
}

template <Real T>
Checkpoint<T> load_checkpoint(const fs::path& dir) {
  if (!is_checkpoint(dir)) fail(ErrorKind::data, "no checkpoint at " + dir.string());
  const ojson j = detail::read_json_file(dir / "manifest.json");
  if (detail::get_or<std::string>(j, "format", "") != "pitlab-checkpoint")
    fail(ErrorKind::data, dir.string() + ": manifest is not a pitlab checkpoint");
  if (!j.contains("config") || !j["config"].is_object())
    fail(ErrorKind::data, dir.string() + ": manifest has no model config");
  const ModelConfig config = detail::model_config_from_json(j["config"]);
  Vocab vocab = Vocab::load(dir / "vocab.json");
  if (vocab.hash() != detail::get_or<std::string>(j, "vocab_hash", ""))
    fail(ErrorKind::data, dir.string() + ": vocab.json does not match the manifest's vocab hash");
  if (vocab.size() != config.vocab_size)
    fail(ErrorKind::data, dir.string() + ": vocabulary size differs from the model config");

  Model<T> model(config);
  const auto tensors = read_tensors<T>(dir / "params.bin");
  auto& params = model.parameters();
  if (tensors.size() != params.size())
    fail(ErrorKind::data, dir.string() + ": params.bin holds " + std::to_string(tensors.size()) +
                              " tensors, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].name != params[i].name || tensors[i].tensor.shape() != params[i].value.shape())
      fail(ErrorKind::data, dir.string() + ": tensor '" + tensors[i].name + "' " +
                                shape_string(tensors[i].tensor.shape()) + " does not match parameter '" +
                                params[i].name + "' " + shape_string(params[i].value.shape()));
    params[i].value = tensors[i].tensor;
  }

  std::optional<OptimState<T>> optim;
  if (fs::is_regular_file(dir / "optim.bin")) {
    const auto moments = read_tensors<T>(dir / "optim.bin");
    if (moments.size() != 2 * params.size())
      fail(ErrorKind::data, dir.string() + ": optim.bin does not match the parameter list");
    OptimState<T> s;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& m = moments[2 * i];
      const auto& v = moments[2 * i + 1];
      if (m.name != "m/" + params[i].name || v.name != "v/" + params[i].name ||
          m.tensor.shape() != params[i].value.shape() || v.tensor.shape() != params[i].value.shape())
        fail(ErrorKind::data, dir.string() + ": optimizer moments for '" + params[i].name + "' are malformed");
      s.m.push_back(m.tensor);
      s.v.push_back(v.tensor);
    }
    s.step = detail::get_or<std::uint64_t>(j, "optim_step", 0);
    optim = std::move(s);
  }

  return Checkpoint<T>{std::move(model), std::move(vocab), std::move(optim),
                       detail::get_or<std::uint64_t>(j, "step", 0), read_checkpoint_meta(dir)};
}

template void save_checkpoint<float>(const fs::path&, const Model<float>&, const Vocab&,
                                     const OptimState<float>*, std::uint64_t,
                                     const std::map<std::string, std::string>&);
template void save_checkpoint<double>(const fs::path&, const Model<double>&, const Vocab&,
                                      const OptimState<double>*, std::uint64_t,
                                      const std::map<std::string, std::string>&);
template Checkpoint<float> load_checkpoint<float>(const fs::path&);
template Checkpoint<double> load_checkpoint<double>(const fs::path&);

}  // namespace pitlab
