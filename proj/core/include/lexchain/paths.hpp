#pragma once

#include <filesystem>

namespace lexchain {

// Resolution order for bundled assets: environment override
// (LEXCHAIN_TEMPLATES / LEXCHAIN_DATA), then the source-tree copies this
// library was built from, then a path relative to the working directory.
std::filesystem::path default_templates_dir();
std::filesystem::path default_data_dir();
std::filesystem::path default_bank_path();

}  // namespace lexchain
