#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace htam {

namespace detail {
struct AssetEntry {
  const char* path;
  const char* content;
};
extern const AssetEntry kAssets[];
extern const std::size_t kAssetCount;
}  // namespace detail

// Bundled data files (prompts, domain tables, EarthAgent catalog/registry/graph),
// addressed by their path relative to data/. Throws Error(kIoFailure) if absent.
std::string_view asset(std::string_view path);
bool has_asset(std::string_view path);
std::vector<std::string> asset_paths();

}  // namespace htam
