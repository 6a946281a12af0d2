#include "htam/assets.hpp"

#include "htam/error.hpp"

namespace htam {

namespace {

const detail::AssetEntry* lookup(std::string_view path) {
  for (std::size_t i = 0; i < detail::kAssetCount; ++i) {
    if (path == detail::kAssets[i].path) return &detail::kAssets[i];
  }
  return nullptr;
}

}  // namespace

std::string_view asset(std::string_view path) {
  if (const auto* e = lookup(path)) return e->content;
  throw Error(ErrorCode::kIoFailure, "no bundled asset " + std::string(path));
}

bool has_asset(std::string_view path) { return lookup(path) != nullptr; }

std::vector<std::string> asset_paths() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < detail::kAssetCount; ++i) out.emplace_back(detail::kAssets[i].path);
  return out;
}

}  // namespace htam
