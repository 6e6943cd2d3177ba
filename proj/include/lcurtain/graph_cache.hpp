#pragma once

#include <filesystem>
#include <optional>

#include "lcurtain/graph.hpp"

namespace lcurtain {

inline constexpr std::uint32_t kGraphCacheVersion = 1;

/// Binary cache: magic "LCGRAPH\0", format version, config hash, the config
/// as JSON, then every ray layer in CSR form. Throws InvalidArgument on I/O
/// failure.
void save_graph(const ConstraintGraph& graph, const std::filesystem::path& path);

/// nullopt when the file is missing, corrupt, of another version, or (with
/// `expected`) built for a different config.
std::optional<ConstraintGraph> load_graph(const std::filesystem::path& path,
                                          const DeviceConfig* expected = nullptr);

/// True when `path` starts with the cache magic.
bool is_graph_cache(const std::filesystem::path& path);

/// Loads `path` if it holds the graph of `config`, otherwise builds the graph
/// and rewrites the cache. `rebuilt` reports which happened.
ConstraintGraph load_or_build(const DeviceConfig& config, const std::filesystem::path& path,
                              bool* rebuilt = nullptr);

}  // namespace lcurtain
