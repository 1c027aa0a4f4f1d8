#include "stvad/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace stvad {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are defined as little-endian");

using nlohmann::json;

json tensor_manifest(std::vector<NamedParam<float>>& params) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (auto& p : params) {
    const std::uint64_t bytes = p.tensor->size() * sizeof(float);
    tensors.push_back({{"name", p.name},
                       {"shape", p.tensor->shape()},
                       {"offset", offset},
                       {"bytes", bytes}});
    offset += bytes;
  }
  return tensors;
}

void write_files(const std::string& stem, const json& manifest,
                 std::vector<NamedParam<float>>& params) {
  std::ofstream mf(stem + ".json");
  if (!mf) throw std::runtime_error("cannot write " + stem + ".json");
  mf << manifest.dump(2) << "\n";
  mf.close();
  if (!mf) throw std::runtime_error("failed writing " + stem + ".json");

  std::ofstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write " + stem + ".bin");
  for (auto& p : params)
    bf.write(reinterpret_cast<const char*>(p.tensor->data()),
             static_cast<std::streamsize>(p.tensor->size() * sizeof(float)));
  bf.close();
  if (!bf) throw std::runtime_error("failed writing " + stem + ".bin");
}

json read_manifest(const std::string& stem, const std::string& kind) {
  std::ifstream mf(stem + ".json");
  if (!mf) throw std::runtime_error("cannot read " + stem + ".json");
  json manifest = json::parse(mf);
  if (manifest.value("model", "") != kind)
    throw std::runtime_error(stem + ".json holds a '" + manifest.value("model", "?") +
                             "' checkpoint, expected '" + kind + "'");
  if (manifest.value("dtype", "") != "float32")
    throw std::runtime_error(stem + ".json has unsupported dtype");
  return manifest;
}

void read_blob(const std::string& stem, const json& manifest,
               std::vector<NamedParam<float>> params) {
  const json& tensors = manifest.at("tensors");
  if (tensors.size() != params.size())
    throw std::runtime_error(stem + ": checkpoint tensor count mismatch");

  std::ifstream bf(stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot read " + stem + ".bin");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& t = tensors[i];
    if (t.at("name") != params[i].name)
      throw std::runtime_error(stem + ": tensor '" + params[i].name + "' missing or misordered");
    if (t.at("shape").get<std::vector<int>>() != params[i].tensor->shape())
      throw std::runtime_error(stem + ": shape mismatch for tensor '" + params[i].name + "'");
    bf.seekg(static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    bf.read(reinterpret_cast<char*>(params[i].tensor->data()),
            static_cast<std::streamsize>(params[i].tensor->size() * sizeof(float)));
    if (!bf) throw std::runtime_error(stem + ".bin truncated at tensor '" + params[i].name + "'");
  }
}

}  // namespace

void save_generator(const std::string& stem, Generator<float>& g) {
  auto params = g.params();
  json manifest = {{"model", "generator"},
                   {"dtype", "float32"},
                   {"byte_order", "little"},
                   {"config",
                    {{"input_size", g.cfg.input_size},
                     {"base_channels", g.cfg.base_channels},
                     {"half_window", g.cfg.half_window},
                     {"convlstm_hidden", g.cfg.convlstm_hidden}}},
                   {"tensors", tensor_manifest(params)}};
  write_files(stem, manifest, params);
}

Generator<float> load_generator(const std::string& stem) {
  json manifest = read_manifest(stem, "generator");
  const json& c = manifest.at("config");
  GeneratorConfig cfg;
  cfg.input_size = c.at("input_size");
  cfg.base_channels = c.at("base_channels");
  cfg.half_window = c.at("half_window");
  cfg.convlstm_hidden = c.at("convlstm_hidden");
  Generator<float> g(cfg);
  read_blob(stem, manifest, g.params());
  return g;
}

void save_discriminator(const std::string& stem, Discriminator<float>& d) {
  auto params = d.params();
  json manifest = {{"model", "discriminator"},
                   {"dtype", "float32"},
                   {"byte_order", "little"},
                   {"config",
                    {{"input_size", d.cfg.input_size},
                     {"sequence_length", d.cfg.sequence_length},
                     {"base_channels", d.cfg.base_channels}}},
                   {"tensors", tensor_manifest(params)}};
  write_files(stem, manifest, params);
}

Discriminator<float> load_discriminator(const std::string& stem) {
  json manifest = read_manifest(stem, "discriminator");
  const json& c = manifest.at("config");
  DiscriminatorConfig cfg;
  cfg.input_size = c.at("input_size");
  cfg.sequence_length = c.at("sequence_length");
  cfg.base_channels = c.at("base_channels");
  Discriminator<float> d(cfg);
  read_blob(stem, manifest, d.params());
  return d;
}

}  // namespace stvad
