#pragma once

#include <filesystem>
#include <string>

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(HTAM_FIXTURE_DIR) / name; }
