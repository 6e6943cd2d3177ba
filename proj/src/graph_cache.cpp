#include "lcurtain/graph_cache.hpp"

#include <cstring>
#include <fstream>

#include "lcurtain/json_io.hpp"

namespace lcurtain {

namespace {

constexpr char kMagic[8] = {'L', 'C', 'G', 'R', 'A', 'P', 'H', '\0'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

template <class T>
bool get_vec(std::istream& in, std::vector<T>& v, std::uint64_t limit) {
  std::uint64_t n = 0;
  if (!get(in, n) || n > limit) return false;
  v.resize(n);
  return static_cast<bool>(in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))));
}

bool layer_consistent(const RayLayer& l, std::size_t next_size, int bins) {
  if (l.offsets.size() != l.nodes.size() + 1 || l.offsets.front() != 0 || l.offsets.back() != l.succ.size()) {
    return false;
  }
  for (std::size_t i = 1; i < l.offsets.size(); ++i) {
    if (l.offsets[i] < l.offsets[i - 1]) return false;
  }
  for (auto s : l.succ) {
    if (s >= next_size) return false;
  }
  for (const auto& n : l.nodes) {
    if (n.prev_bin >= bins || n.cur_bin >= bins) return false;
  }
  return true;
}

}  // namespace

void save_graph(const ConstraintGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put(out, kGraphCacheVersion);
  put(out, config_hash(graph.config()));
  const std::string text = to_json(graph.config()).dump();
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint8_t>(out, graph.is_pruned() ? 1 : 0);
  for (int t = 0; t < graph.ray_count(); ++t) {
    const auto& l = graph.layer(t);
    put_vec(out, l.nodes);
    put_vec(out, l.offsets);
    put_vec(out, l.succ);
  }
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

bool is_graph_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[sizeof kMagic];
  return in.read(magic, sizeof magic) && std::memcmp(magic, kMagic, sizeof kMagic) == 0;
}

std::optional<ConstraintGraph> load_graph(const std::filesystem::path& path, const DeviceConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof kMagic];
  std::uint32_t version = 0;
  std::uint64_t hash = 0, text_size = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) return std::nullopt;
  if (!get(in, version) || version != kGraphCacheVersion) return std::nullopt;
  if (!get(in, hash) || !get(in, text_size) || text_size > (1u << 20)) return std::nullopt;
  if (expected && hash != config_hash(*expected)) return std::nullopt;
  std::string text(text_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(text_size))) return std::nullopt;

  DeviceConfig config;
  try {
    config = config_from_json(Json::parse(text));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (config_hash(config) != hash) return std::nullopt;
  if (expected && !(config == *expected)) return std::nullopt;

  std::uint8_t pruned = 0;
  if (!get(in, pruned)) return std::nullopt;
  const auto K = static_cast<std::uint64_t>(config.range_bins);
  std::vector<RayLayer> layers(static_cast<std::size_t>(config.ray_count));
  for (auto& l : layers) {
    if (!get_vec(in, l.nodes, K * K) || !get_vec(in, l.offsets, K * K + 1) || !get_vec(in, l.succ, K * K * K)) {
      return std::nullopt;
    }
  }
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const std::size_t next = t + 1 < layers.size() ? layers[t + 1].size() : 0;
    if (!layer_consistent(layers[t], next, config.range_bins)) return std::nullopt;
  }
  return assemble_graph(config, AngleTable::from_config(config), std::move(layers), pruned != 0);
}

ConstraintGraph load_or_build(const DeviceConfig& config, const std::filesystem::path& path, bool* rebuilt) {
  if (auto g = load_graph(path, &config)) {
    if (rebuilt) *rebuilt = false;
    return std::move(*g);
  }
  auto g = build_graph(config);
  save_graph(g, path);
  if (rebuilt) *rebuilt = true;
  return g;
}

}  // namespace lcurtain
